#pragma once

#include "revmap/analytics.hpp"
#include "revmap/classify.hpp"
#include "revmap/corpus.hpp"
#include "revmap/index.hpp"
#include "revmap/klink.hpp"
#include "revmap/review.hpp"
#include "revmap/selection.hpp"
#include "revmap/stats.hpp"
#include "revmap/taxonomy.hpp"
#include "revmap/text.hpp"
#include "revmap/version.hpp"
