#pragma once

#include <vector>

#include "hsisr/core/cube.hpp"

namespace hsisr {

// Number of positions along one axis: floor((n - patch) / stride) + 1.
int patch_positions(int n, int patch, int stride);

// Co-registered HR/LR patches. Positions step by spec.stride on the HR grid;
// stride and patch size must be multiples of the scale. With augment, each
// patch is followed by its 7 other dihedral transforms.
std::vector<ImagePair> extract_patches(const ImagePair& pair, const PatchSpec& spec);

// One of the 8 dihedral transforms of a square cube (0 = identity).
Cube dihedral(const Cube& cube, int which);

}  // namespace hsisr
