#pragma once

#include <iostream>

namespace legalqa {

/// The operator CLI: synth, ingest, graph {build,stats}, train, eval, index,
/// serve, ask. Exit 0 on success, 1 on a runtime error, 2 on a usage error.
/// `ask` reads its answers from `in` unless --script is given.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err, std::istream& in = std::cin);

}  // namespace legalqa
