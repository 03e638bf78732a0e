#pragma once

#include <cstdint>
#include <string>

namespace tabens {

/// Deterministic stand-ins for the two public obesity datasets, with the
/// original schemas and class distributions:
///   dataset 1: 1610 rows, 14 integer features, 4 classes (73/658/592/287)
///   dataset 2: 2111 rows, 8 numeric + 8 categorical features, 7 classes
///              (272/287/351/297/324/290/290)
/// Class-conditional structure is calibrated so the shipped pipeline configs
/// land in the documented accuracy bands.
std::string make_dataset1_csv(std::uint64_t seed);
std::string make_dataset2_csv(std::uint64_t seed);

}  // namespace tabens
