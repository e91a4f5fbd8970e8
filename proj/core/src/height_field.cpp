#include "genus_tsp/height_field.hpp"

#include "genus_tsp/bump.hpp"

namespace gts {

nlohmann::json ZeroField::to_json() const {
  return {{"type", "zero"}, {"params", nlohmann::json::object()}};
}

std::shared_ptr<HeightField> basic_field_from_json(const nlohmann::json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "zero") return std::make_shared<ZeroField>();
  if (type == "bump_sum") return BumpSumField::from_json(j);
  return nullptr;
}

}  // namespace gts
