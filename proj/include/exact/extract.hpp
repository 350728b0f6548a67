#pragma once

#include "exact/extract/backend.hpp"
#include "exact/extract/prompt.hpp"
#include "exact/extract/response.hpp"
#include "exact/extract/rules.hpp"
#include "exact/extract/text.hpp"
