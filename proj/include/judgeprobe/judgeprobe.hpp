#pragma once

// Umbrella header for the judgeprobe cue-perturbation audit harness.

#include "judgeprobe/acknowledgment.hpp"
#include "judgeprobe/common.hpp"
#include "judgeprobe/config.hpp"
#include "judgeprobe/corpus.hpp"
#include "judgeprobe/cues.hpp"
#include "judgeprobe/judge_client.hpp"
#include "judgeprobe/metrics.hpp"
#include "judgeprobe/pipeline.hpp"
#include "judgeprobe/prompting.hpp"
#include "judgeprobe/report.hpp"
#include "judgeprobe/trial.hpp"
#include "judgeprobe/verdict_parser.hpp"
