#pragma once

#include "evidence/benchmarks.hpp"
#include "evidence/errors.hpp"
#include "evidence/estimators.hpp"
#include "evidence/log_math.hpp"
#include "evidence/model.hpp"
#include "evidence/nested.hpp"
#include "evidence/pmc.hpp"
#include "evidence/samplers.hpp"
