#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "lgir/gateway.hpp"

namespace lgir::cli {

struct Streams {
    std::istream& in;
    std::ostream& out;
    std::ostream& err;
};

/// Hook so tests can supply their own backends in place of --mock or HTTP.
using GatewayFactory = std::function<void(Gateway&)>;

/// Runs one command line. Returns the process exit status:
/// 0 success, 1 a structured engine error, 2 a usage error.
int run_cli(const std::vector<std::string>& args, Streams streams, const GatewayFactory& factory = {});

}  // namespace lgir::cli
