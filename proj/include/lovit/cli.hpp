#pragma once

namespace lovit {

// Entry point of the `lovit` tool: gen, infer, eval, heatmap, bench, verify.
// Returns the process exit code; failures print a message to stderr.
int cli_main(int argc, char** argv);

}  // namespace lovit
