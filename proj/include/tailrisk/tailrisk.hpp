#pragma once

#include "tailrisk/errors.hpp"
#include "tailrisk/specfun.hpp"
#include "tailrisk/distributions.hpp"
#include "tailrisk/tail_metrics.hpp"
#include "tailrisk/empirical.hpp"
#include "tailrisk/numeric_oracle.hpp"
#include "tailrisk/portfolio.hpp"
#include "tailrisk/estimation.hpp"
#include "tailrisk/io.hpp"
