#pragma once

#include "exact/harness/case_io.hpp"
#include "exact/harness/config.hpp"
#include "exact/harness/experiment.hpp"
