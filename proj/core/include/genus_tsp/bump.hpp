#pragma once

#include <memory>
#include <vector>

#include "genus_tsp/height_field.hpp"

namespace gts {

// Normalized mollifier of radius r:
//   psi_r(x,y) = exp(-1 / (1 - (x^2+y^2)/r^2)) / Z   inside B(0,r), 0 outside,
// with Z chosen so the integral over the plane is 1.
class PsiKernel {
 public:
  explicit PsiKernel(double radius);

  double radius() const { return r_; }
  double normalizer() const { return z_; }
  // Value and partials of the kernel itself.
  FieldEval eval(double x, double y) const;
  double value(double x, double y) const { return eval(x, y).f; }

  // Integrals of |d psi| and |d^2 psi| over the plane; multiplying by the
  // range of a bounded function bounds the derivatives of its convolution.
  double abs_grad_integral() const { return abs_grad_integral_; }
  double abs_hess_integral() const { return abs_hess_integral_; }

 private:
  double r_;
  double z_;
  double abs_grad_integral_;
  double abs_hess_integral_;
};

// Radially symmetric plateau bump centered at c:
//   1 on rho <= a, exp(-1/(1 - w^2)) with w = (rho-a)/(r-a) on a < rho < r,
//   0 on rho >= r, all scaled by height.
// Note the printed transition profile equals exp(-1) rather than 1 at the
// inner seam; the outer seam is flat to all orders.
struct PlateauBump {
  Vec2 center;
  double a = 0.0;       // plateau radius
  double r = 0.0;       // support radius, r > a
  double height = 1.0;

  FieldEval eval(double x, double y) const;
  // Max |first partial| / |second partial| of this bump (numeric bound).
  double grad_bound() const;
  double hess_bound() const;
};

// Dimensionless profile of the unit plateau bump (a=0 handled by caller);
// exposed for direct formula checks.
double plateau_profile(double w);

class BumpSumField final : public HeightField {
 public:
  explicit BumpSumField(std::vector<PlateauBump> bumps);

  FieldEval eval(double x, double y) const override;
  double m1() const override { return m1_; }
  double m2() const override { return m2_; }
  std::string type() const override { return "bump_sum"; }
  nlohmann::json to_json() const override;
  const std::vector<PlateauBump>& bumps() const { return bumps_; }

  static std::shared_ptr<BumpSumField> from_json(const nlohmann::json& j);

 private:
  std::vector<PlateauBump> bumps_;
  double m1_ = 0.0;
  double m2_ = 0.0;
};

// Precomputed quadrature for convolving a bounded function with psi_r and
// with its first/second kernel derivatives. Nodes live on a polar grid over
// the kernel support.
class KernelQuadrature {
 public:
  KernelQuadrature(const PsiKernel& kernel, int radial_nodes = 24,
                   int angular_nodes = 32);

  // Convolution (psi * g)(p) and its derivatives, where derivatives are taken
  // by convolving g with the kernel derivatives.
  template <class G>
  FieldEval convolve(const Vec2& p, G&& g) const {
    FieldEval out;
    for (const Node& nd : nodes_) {
      double v = g(p.x - nd.dx, p.y - nd.dy);
      out.f += nd.w * v;
      out.fx += nd.wx * v;
      out.fy += nd.wy * v;
      out.fxx += nd.wxx * v;
      out.fxy += nd.wxy * v;
      out.fyy += nd.wyy * v;
    }
    return out;
  }

  double weight_sum() const { return weight_sum_; }

 private:
  struct Node {
    double dx, dy;
    double w, wx, wy, wxx, wxy, wyy;
  };
  std::vector<Node> nodes_;
  double weight_sum_ = 0.0;
};

}  // namespace gts
