#pragma once

#include "crashlens/config.hpp"
#include "crashlens/error.hpp"
#include "crashlens/evaluation.hpp"
#include "crashlens/grouping.hpp"
#include "crashlens/ingest.hpp"
#include "crashlens/json_io.hpp"
#include "crashlens/pipeline.hpp"
#include "crashlens/ranking.hpp"
#include "crashlens/report.hpp"
#include "crashlens/time.hpp"
#include "crashlens/trace_model.hpp"
#include "crashlens/union_find.hpp"
