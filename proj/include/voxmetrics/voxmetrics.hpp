#pragma once

#include "augment.hpp"
#include "edt.hpp"
#include "error.hpp"
#include "metrics.hpp"
#include "nifti.hpp"
#include "parallel.hpp"
#include "percentile.hpp"
#include "phantom.hpp"
#include "preprocess.hpp"
#include "records.hpp"
#include "report.hpp"
#include "resample.hpp"
#include "stats.hpp"
#include "volume.hpp"
