#pragma once

// The six demo domains exercised across the test suites.

#include <string>
#include <utility>
#include <vector>

#include "hardyspec/geometry.hpp"

namespace corpus {

using namespace hardyspec;

inline Domain interval() {
  AABox b; b.lo = {0, 0, 0}; b.hi = {1, 0, 0};
  return make_domain(1, CsgNode::make_box(b));
}

inline Domain square() {
  AABox b; b.lo = {0, 0, 0}; b.hi = {1, 1, 0};
  return make_domain(2, CsgNode::make_box(b));
}

inline Domain disk() { return make_domain(2, CsgNode::make_ball({{0, 0, 0}, 1.0})); }

/// (0,2)^2 minus the closed square [1,2]^2.
inline Domain lshape() {
  AABox big; big.lo = {0, 0, 0}; big.hi = {2, 2, 0};
  AABox cut; cut.lo = {1, 1, 0}; cut.hi = {2, 2, 0};
  return make_domain(2, CsgNode::make_op(CsgNode::Kind::difference,
                                         {CsgNode::make_box(big), CsgNode::make_box(cut)}));
}

/// Unit disk minus the closed ball of radius 1/2.
inline Domain annulus() {
  auto outer = CsgNode::make_ball({{0, 0, 0}, 1.0});
  auto inner = CsgNode::make_ball({{0, 0, 0}, 0.5});
  return make_domain(2, CsgNode::make_op(CsgNode::Kind::difference, {outer, inner}));
}

/// Comb of 8 rooms hanging off a thin horizontal corridor: the counterexample
/// shape for inradius-based lower bounds (wide rooms, narrow connections).
inline Domain rooms_passages() {
  std::vector<CsgNode> parts;
  for (int i = 0; i < 8; ++i) {
    AABox room;
    room.lo = {0.025 + 0.25 * i, 0.2, 0};
    room.hi = {0.175 + 0.25 * i, 0.8, 0};
    parts.push_back(CsgNode::make_box(room));
  }
  AABox corridor; corridor.lo = {0, 0.45, 0}; corridor.hi = {2, 0.55, 0};
  parts.push_back(CsgNode::make_box(corridor));
  return make_domain(2, CsgNode::make_op(CsgNode::Kind::unite, std::move(parts)));
}

inline std::vector<std::pair<std::string, Domain>> all() {
  return {{"interval", interval()}, {"square", square()},   {"disk", disk()},
          {"lshape", lshape()},     {"annulus", annulus()}, {"rooms", rooms_passages()}};
}

}  // namespace corpus
