#pragma once

#include <memory>
#include <string>

#include <json.hpp>

#include "genus_tsp/geometry.hpp"

namespace gts {

// Value and partial derivatives of a height function at one point.
struct FieldEval {
  double f = 0.0;
  double fx = 0.0;
  double fy = 0.0;
  double fxx = 0.0;
  double fxy = 0.0;
  double fyy = 0.0;
};

// Smooth height function f over the base space. m1/m2 are recorded upper
// bounds on |first partials| and |second partials| over the whole domain.
class HeightField {
 public:
  virtual ~HeightField() = default;
  virtual FieldEval eval(double x, double y) const = 0;
  virtual double m1() const = 0;
  virtual double m2() const = 0;
  virtual std::string type() const = 0;
  virtual nlohmann::json to_json() const = 0;
};

class ZeroField final : public HeightField {
 public:
  FieldEval eval(double, double) const override { return {}; }
  double m1() const override { return 0.0; }
  double m2() const override { return 0.0; }
  std::string type() const override { return "zero"; }
  nlohmann::json to_json() const override;
};

// Parses "zero" and "bump_sum" descriptors; returns nullptr for types owned
// by other layers (see field_from_json in embeddings.hpp for the full set).
std::shared_ptr<HeightField> basic_field_from_json(const nlohmann::json& j);

}  // namespace gts
