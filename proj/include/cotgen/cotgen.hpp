#pragma once

// Umbrella header.

#include "cotgen/bench.hpp"
#include "cotgen/curate.hpp"
#include "cotgen/data.hpp"
#include "cotgen/domain.hpp"
#include "cotgen/dpo.hpp"
#include "cotgen/error.hpp"
#include "cotgen/eval.hpp"
#include "cotgen/features.hpp"
#include "cotgen/hash.hpp"
#include "cotgen/jsonl.hpp"
#include "cotgen/model.hpp"
#include "cotgen/objects.hpp"
#include "cotgen/prompt.hpp"
#include "cotgen/render.hpp"
#include "cotgen/rng.hpp"
#include "cotgen/schedule.hpp"
#include "cotgen/scorer.hpp"
#include "cotgen/verify.hpp"
