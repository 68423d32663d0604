#pragma once

#include "triad/survey/generate.hpp"
#include "triad/survey/graph.hpp"
#include "triad/survey/mi.hpp"
#include "triad/survey/records.hpp"
#include "triad/survey/summary.hpp"
