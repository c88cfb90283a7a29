#pragma once

#include "hom/analytic.hpp"
#include "hom/config.hpp"
#include "hom/dispersion.hpp"
#include "hom/errors.hpp"
#include "hom/faddeeva.hpp"
#include "hom/fit.hpp"
#include "hom/histogram.hpp"
#include "hom/io.hpp"
#include "hom/model.hpp"
#include "hom/montecarlo.hpp"
#include "hom/output.hpp"
#include "hom/timetag.hpp"
#include "hom/visibility.hpp"
