#pragma once

#include "evidence/harness/config.hpp"
#include "evidence/harness/experiment.hpp"
#include "evidence/harness/references.hpp"
#include "evidence/harness/summary.hpp"
