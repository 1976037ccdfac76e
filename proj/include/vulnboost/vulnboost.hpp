#pragma once

#include "vulnboost/common.hpp"
#include "vulnboost/dataset.hpp"
#include "vulnboost/gbdt.hpp"
#include "vulnboost/metrics.hpp"
#include "vulnboost/ovr.hpp"
#include "vulnboost/pipeline.hpp"
#include "vulnboost/qpso.hpp"
#include "vulnboost/schema.hpp"
#include "vulnboost/smote.hpp"
#include "vulnboost/synth.hpp"
