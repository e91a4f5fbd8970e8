#include "genus_tsp/bump.hpp"

#include <algorithm>
#include <cmath>

namespace gts {

namespace {

// Simpson rule over [0,1].
template <class F>
double simpson01(F&& f, int n) {
  if (n % 2) ++n;
  double h = 1.0 / n;
  double s = f(0.0) + f(1.0);
  for (int i = 1; i < n; ++i) s += f(i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

// exp(-1/(1-u)) and derivatives with respect to u, for u in [0,1).
struct Mollifier {
  double g, gu, guu;
};
Mollifier mollifier(double u) {
  if (u >= 1.0) return {0.0, 0.0, 0.0};
  double inv = 1.0 / (1.0 - u);
  double g = std::exp(-inv);
  double e1 = -inv * inv;              // dE/du, E = -1/(1-u)
  double e2 = -2.0 * inv * inv * inv;  // d2E/du2
  return {g, g * e1, g * (e2 + e1 * e1)};
}

}  // namespace

PsiKernel::PsiKernel(double radius) : r_(radius) {
  const int n = 4096;
  double i0 = simpson01([](double u) { return mollifier(u).g; }, n);
  z_ = M_PI * r_ * r_ * i0;

  // Radial gradient magnitude integral: 2*pi * int |psi'(rho)| rho drho.
  auto radial_abs_grad = [&](double s) {
    double rho = s * r_;
    double u = s * s;
    auto m = mollifier(u);
    // d/drho of g(u(rho)) = gu * 2 rho / r^2
    return std::abs(m.gu * 2.0 * rho / (r_ * r_)) * rho;
  };
  abs_grad_integral_ = 2.0 * M_PI * r_ * simpson01(radial_abs_grad, n) / z_;

  // Max over components of int |second partial of psi| (polar sampling).
  double ixx = 0.0, ixy = 0.0;
  const int nr = 512, na = 256;
  for (int i = 0; i < nr; ++i) {
    double rho = (i + 0.5) * r_ / nr;
    for (int j = 0; j < na; ++j) {
      double th = (j + 0.5) * 2.0 * M_PI / na;
      auto e = eval(rho * std::cos(th), rho * std::sin(th));
      double area = rho * (r_ / nr) * (2.0 * M_PI / na);
      ixx += std::abs(e.fxx) * area;
      ixy += std::abs(e.fxy) * area;
    }
  }
  abs_hess_integral_ = std::max(ixx, ixy);
}

FieldEval PsiKernel::eval(double x, double y) const {
  FieldEval out;
  double u = (x * x + y * y) / (r_ * r_);
  if (u >= 1.0) return out;
  auto m = mollifier(u);
  double ux = 2.0 * x / (r_ * r_);
  double uy = 2.0 * y / (r_ * r_);
  double uxx = 2.0 / (r_ * r_);
  out.f = m.g / z_;
  out.fx = m.gu * ux / z_;
  out.fy = m.gu * uy / z_;
  out.fxx = (m.guu * ux * ux + m.gu * uxx) / z_;
  out.fyy = (m.guu * uy * uy + m.gu * uxx) / z_;
  out.fxy = m.guu * ux * uy / z_;
  return out;
}

double plateau_profile(double w) {
  if (w <= 0.0) return 1.0;
  if (w >= 1.0) return 0.0;
  return std::exp(-1.0 / (1.0 - w * w));
}

FieldEval PlateauBump::eval(double x, double y) const {
  FieldEval out;
  double dx = x - center.x, dy = y - center.y;
  double rho = std::hypot(dx, dy);
  if (rho >= r) return out;
  if (rho <= a) {
    out.f = height;
    return out;
  }
  double span = r - a;
  double w = (rho - a) / span;
  double u = w * w;
  auto m = mollifier(u);
  // phi(rho) = g(w^2), radial derivatives via chain rule.
  double dwdr = 1.0 / span;
  double phr = m.gu * 2.0 * w * dwdr;
  double phrr = (m.guu * 4.0 * w * w + m.gu * 2.0) * dwdr * dwdr;
  double cx = dx / rho, cy = dy / rho;
  out.f = height * m.g;
  out.fx = height * phr * cx;
  out.fy = height * phr * cy;
  out.fxx = height * (phrr * cx * cx + phr * cy * cy / rho);
  out.fyy = height * (phrr * cy * cy + phr * cx * cx / rho);
  out.fxy = height * (phrr - phr / rho) * cx * cy;
  return out;
}

double PlateauBump::grad_bound() const {
  double best = 0.0;
  const int n = 2048;
  for (int i = 1; i < n; ++i) {
    double rho = a + (r - a) * i / n;
    auto e = eval(center.x + rho, center.y);
    best = std::max(best, std::abs(e.fx));
  }
  return best;
}

double PlateauBump::hess_bound() const {
  double best = 0.0;
  const int n = 2048;
  for (int i = 1; i < n; ++i) {
    double rho = a + (r - a) * i / n;
    auto e = eval(center.x + rho, center.y);
    best = std::max({best, std::abs(e.fxx), std::abs(e.fyy), std::abs(e.fxy)});
  }
  return best;
}

BumpSumField::BumpSumField(std::vector<PlateauBump> bumps)
    : bumps_(std::move(bumps)) {
  for (const auto& b : bumps_) {
    m1_ += b.grad_bound();
    m2_ += b.hess_bound();
  }
}

FieldEval BumpSumField::eval(double x, double y) const {
  FieldEval out;
  for (const auto& b : bumps_) {
    auto e = b.eval(x, y);
    out.f += e.f;
    out.fx += e.fx;
    out.fy += e.fy;
    out.fxx += e.fxx;
    out.fxy += e.fxy;
    out.fyy += e.fyy;
  }
  return out;
}

nlohmann::json BumpSumField::to_json() const {
  nlohmann::json bumps = nlohmann::json::array();
  for (const auto& b : bumps_) {
    bumps.push_back({{"cx", b.center.x},
                     {"cy", b.center.y},
                     {"a", b.a},
                     {"r", b.r},
                     {"height", b.height}});
  }
  return {{"type", "bump_sum"}, {"params", {{"bumps", bumps}}}};
}

std::shared_ptr<BumpSumField> BumpSumField::from_json(const nlohmann::json& j) {
  std::vector<PlateauBump> bumps;
  for (const auto& b : j.at("params").at("bumps")) {
    bumps.push_back(PlateauBump{{b.at("cx").get<double>(), b.at("cy").get<double>()},
                                b.at("a").get<double>(),
                                b.at("r").get<double>(),
                                b.at("height").get<double>()});
  }
  return std::make_shared<BumpSumField>(std::move(bumps));
}

KernelQuadrature::KernelQuadrature(const PsiKernel& kernel, int radial_nodes,
                                   int angular_nodes) {
  double r = kernel.radius();
  double dr = r / radial_nodes;
  double dth = 2.0 * M_PI / angular_nodes;
  for (int i = 0; i < radial_nodes; ++i) {
    double rho = (i + 0.5) * dr;
    for (int j = 0; j < angular_nodes; ++j) {
      double th = (j + 0.5) * dth;
      double dx = rho * std::cos(th), dy = rho * std::sin(th);
      auto e = kernel.eval(dx, dy);
      double area = rho * dr * dth;
      nodes_.push_back(
          {dx, dy, e.f * area, e.fx * area, e.fy * area, e.fxx * area,
           e.fxy * area, e.fyy * area});
      weight_sum_ += e.f * area;
    }
  }
  // Normalize the value weights so constants convolve exactly to themselves.
  for (auto& nd : nodes_) nd.w /= weight_sum_;
}

}  // namespace gts
