#pragma once

#include <filesystem>
#include <iosfwd>

#include "noisyfp/dataset.hpp"

namespace noisyfp {

// JSON-lines dataset format (UTF-8, one JSON object per line, keys sorted):
//
//   {"has_ground_truth":true,"m":3,"oracle":{"flips":[[1,2]],"kind":"label_with_flips"}}
//   {"label":7,"payload":{"labeled":7}}
//   {"payload":{"int_set":[1,2,9]}}
//   {"payload":{"triple":[1,3,17]},"tag":[1,3,2]}
//
// Oracle objects: {"kind":"label_with_flips","flips":[[i,j],...]},
// {"kind":"set_intersection","threshold":T}, {"kind":"tuple_rule","modulus":n}.
// Flip pairs and every index are 1-based. "label" is present on every item
// line iff has_ground_truth; "tag" ([element, player, slot]) is optional but
// all-or-nothing.

void write_dataset(std::ostream& out, const Dataset& ds);
Dataset read_dataset(std::istream& in);

void save_dataset(const std::filesystem::path& path, const Dataset& ds);
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace noisyfp
