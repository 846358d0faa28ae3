#pragma once

#include "depdec/advisories.hpp"
#include "depdec/changes.hpp"
#include "depdec/corpus.hpp"
#include "depdec/errors.hpp"
#include "depdec/harness.hpp"
#include "depdec/manifests.hpp"
#include "depdec/patch.hpp"
#include "depdec/policy.hpp"
#include "depdec/report.hpp"
#include "depdec/scoring.hpp"
#include "depdec/time.hpp"
#include "depdec/version.hpp"
