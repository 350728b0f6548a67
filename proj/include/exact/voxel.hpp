#pragma once

#include "exact/voxel/augment.hpp"
#include "exact/voxel/components.hpp"
#include "exact/voxel/geometry.hpp"
#include "exact/voxel/image.hpp"
#include "exact/voxel/intensity.hpp"
#include "exact/voxel/io.hpp"
#include "exact/voxel/lobe_mask.hpp"
#include "exact/voxel/patches.hpp"
#include "exact/voxel/resample.hpp"
#include "exact/voxel/sample.hpp"
