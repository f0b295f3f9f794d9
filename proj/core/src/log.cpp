#include "fwseg/log.hpp"

#include <iostream>
#include <mutex>

namespace fwseg {

namespace {

std::mutex g_sink_mutex;

WarningSink& current_sink() {
    static WarningSink sink = [](const std::string& msg) { std::cerr << "[fwseg] warning: " << msg << '\n'; };
    return sink;
}

}  // namespace

void warn(const std::string& message) {
    std::lock_guard lock(g_sink_mutex);
    current_sink()(message);
}

ScopedWarningSink::ScopedWarningSink(WarningSink sink) {
    std::lock_guard lock(g_sink_mutex);
    previous_ = std::exchange(current_sink(), std::move(sink));
}

ScopedWarningSink::~ScopedWarningSink() {
    std::lock_guard lock(g_sink_mutex);
    current_sink() = std::move(previous_);
}

}  // namespace fwseg
