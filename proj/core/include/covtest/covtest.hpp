#pragma once

#include "covtest/covmodels.hpp"
#include "covtest/csv_io.hpp"
#include "covtest/error.hpp"
#include "covtest/experiments.hpp"
#include "covtest/parallel.hpp"
#include "covtest/sampling.hpp"
#include "covtest/seeding.hpp"
#include "covtest/statistics.hpp"
#include "covtest/testing.hpp"
