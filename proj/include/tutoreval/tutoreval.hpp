#pragma once

// Umbrella header: the whole library.

#include "tutoreval/consensus.hpp"
#include "tutoreval/corpus.hpp"
#include "tutoreval/llm/cache.hpp"
#include "tutoreval/llm/client.hpp"
#include "tutoreval/llm/clock.hpp"
#include "tutoreval/llm/http_transport.hpp"
#include "tutoreval/llm/rate_limiter.hpp"
#include "tutoreval/llm/transport.hpp"
#include "tutoreval/pipeline.hpp"
#include "tutoreval/prompting.hpp"
#include "tutoreval/report.hpp"
#include "tutoreval/scoring.hpp"
#include "tutoreval/stats.hpp"
#include "tutoreval/types.hpp"
