#pragma once

#include "exact/detect/detector.hpp"
#include "exact/extract.hpp"
#include "exact/guide.hpp"
#include "exact/harness.hpp"
#include "exact/losses/losses.hpp"
#include "exact/metrics/metrics.hpp"
#include "exact/phantom.hpp"
#include "exact/voxel.hpp"
