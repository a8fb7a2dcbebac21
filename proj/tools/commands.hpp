#pragma once

#include "config.hpp"

namespace moire::cli {

void cmd_forward(const RunConfig& c);
void cmd_invert(const RunConfig& c);
void cmd_twist(const RunConfig& c);
void cmd_dataset(const RunConfig& c);
void cmd_train(const RunConfig& c);
void cmd_eval(const RunConfig& c);
void cmd_bench(const RunConfig& c);

void run_command(const RunConfig& c);

}  // namespace moire::cli
