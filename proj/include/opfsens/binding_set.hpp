#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "opfsens/network.hpp"

namespace opfsens {

/// Binding generators S_G and binding branches S_B, by index. Only the sets
/// matter: a limit binding at its upper or lower side gives the same row.
struct BindingSet {
  std::vector<std::size_t> gens;
  std::vector<std::size_t> branches;

  std::size_t size() const noexcept { return gens.size() + branches.size(); }
  bool empty() const noexcept { return size() == 0; }
  bool operator==(const BindingSet&) const = default;
};

/// "{1, 3, (7,8)}" using bus labels.
std::string describe(const BindingSet& set, const Network& net);

}  // namespace opfsens
