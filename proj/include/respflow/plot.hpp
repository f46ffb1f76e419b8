#pragma once

#include <string>

#include "respflow/signal.hpp"

namespace respflow {

// Renders raw and filtered traces with peak markers into a standalone SVG document.
std::string render_signal_svg(const SignalDump& dump, const std::string& title);

void write_signal_svg(const SignalDump& dump, const std::string& title, const std::string& path);

}  // namespace respflow
