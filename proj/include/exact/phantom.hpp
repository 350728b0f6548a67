#pragma once

#include "exact/phantom/anatomy.hpp"
#include "exact/phantom/case.hpp"
#include "exact/phantom/cohort.hpp"
#include "exact/phantom/report.hpp"
#include "exact/phantom/spec.hpp"
