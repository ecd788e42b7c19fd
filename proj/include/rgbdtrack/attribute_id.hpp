#pragma once

#include <array>
#include <cstddef>
#include <string_view>

#include "rgbdtrack/errors.hpp"

namespace rgbdtrack {

/// The 15 per-frame challenge attributes. AC, DC, FM, SC and NaN are computed
/// from boxes and depth maps; the remaining ten are assigned manually.
/// NaN marks frames carrying no other attribute and excludes all of them.
enum class AttributeId : int {
  AC = 0,   // aspect-ratio change
  BC,       // background clutter
  CM,       // camera motion
  DC,       // depth change
  DS,       // dark scene
  FM,       // fast motion
  FO,       // full occlusion
  ND,       // non-rigid deformation
  OP,       // out-of-plane rotation
  OF,       // out of frame
  PO,       // partial occlusion
  RT,       // reflective target
  SC,       // size change
  SO,       // similar objects
  NaN,      // unassigned
};

inline constexpr std::size_t kAttributeCount = 15;

inline constexpr std::array<AttributeId, kAttributeCount> kAllAttributes = {
    AttributeId::AC, AttributeId::BC, AttributeId::CM, AttributeId::DC, AttributeId::DS,
    AttributeId::FM, AttributeId::FO, AttributeId::ND, AttributeId::OP, AttributeId::OF,
    AttributeId::PO, AttributeId::RT, AttributeId::SC, AttributeId::SO, AttributeId::NaN,
};

constexpr std::string_view attribute_name(AttributeId id) {
  constexpr std::array<std::string_view, kAttributeCount> names = {
      "AC", "BC", "CM", "DC", "DS", "FM", "FO", "ND", "OP", "OF", "PO", "RT", "SC", "SO", "NaN"};
  return names[static_cast<std::size_t>(id)];
}

inline AttributeId attribute_from_name(std::string_view name) {
  for (AttributeId id : kAllAttributes) {
    if (attribute_name(id) == name) return id;
  }
  throw ParseError("unknown attribute name: " + std::string(name));
}

/// True for the attributes derived by formula rather than assigned by hand.
constexpr bool attribute_is_computed(AttributeId id) {
  return id == AttributeId::AC || id == AttributeId::DC || id == AttributeId::FM ||
         id == AttributeId::SC || id == AttributeId::NaN;
}

}  // namespace rgbdtrack
