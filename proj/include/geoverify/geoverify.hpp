#pragma once

#include "geoverify/climatology.hpp"
#include "geoverify/csv.hpp"
#include "geoverify/cube_io.hpp"
#include "geoverify/error.hpp"
#include "geoverify/grid.hpp"
#include "geoverify/layout.hpp"
#include "geoverify/metrics.hpp"
#include "geoverify/parallel.hpp"
#include "geoverify/regrid.hpp"
#include "geoverify/report.hpp"
#include "geoverify/synth.hpp"
#include "geoverify/tc.hpp"
#include "geoverify/time.hpp"
#include "geoverify/track.hpp"
#include "geoverify/vqa.hpp"
