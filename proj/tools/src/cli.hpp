#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "eventsnn/grad.hpp"

namespace eventsnn::cli {

enum ExitCode : int { kOk = 0, kConfigError = 2, kRuntimeError = 3 };

/// Runs one `eventsnn <subcommand> ...` invocation; args excludes the program
/// name. Progress goes to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Per-sample gradients written by replay-train, followed by their mean.
struct GradientRecord {
  int sample = -1;  // -1 marks the batch mean
  Gradients grads;
};

void write_gradients(std::ostream& os, const std::vector<GradientRecord>& records);
std::vector<GradientRecord> read_gradients(std::istream& is);

}  // namespace eventsnn::cli
