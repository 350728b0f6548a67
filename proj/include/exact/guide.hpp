#pragma once

#include "exact/guide/guide.hpp"
