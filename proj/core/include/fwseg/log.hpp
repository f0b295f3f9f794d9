#pragma once

#include <functional>
#include <string>

namespace fwseg {

using WarningSink = std::function<void(const std::string&)>;

/// Emits a warning through the current sink (stderr by default).
void warn(const std::string& message);

/// Replaces the warning sink for the lifetime of the guard.
class ScopedWarningSink {
public:
    explicit ScopedWarningSink(WarningSink sink);
    ~ScopedWarningSink();
    ScopedWarningSink(const ScopedWarningSink&) = delete;
    ScopedWarningSink& operator=(const ScopedWarningSink&) = delete;

private:
    WarningSink previous_;
};

}  // namespace fwseg
