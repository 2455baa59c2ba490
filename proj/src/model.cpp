#include "wdimer/model.hpp"

#include <string>

#include "wdimer/errors.hpp"

namespace wdimer {

std::string to_string(Topology topology) {
  return topology == Topology::LossAtWell2 ? "loss_at_well2" : "loss_at_well1";
}

Topology topology_from_string(std::string_view text) {
  if (text == "loss_at_well2") return Topology::LossAtWell2;
  if (text == "loss_at_well1") return Topology::LossAtWell1;
  throw ConfigError("unknown topology '" + std::string(text) + "' (expected loss_at_well1 or loss_at_well2)");
}

}  // namespace wdimer
