#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace stepnet {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// des-core
class SchedulingInPast : public Error { using Error::Error; };
class TimeOverflow : public Error { using Error::Error; };
class DispatchError : public Error { using Error::Error; };

// signal-bus
class PayloadMismatch : public Error { using Error::Error; };
class SignalLoop : public Error { using Error::Error; };

// rl-env
class UnknownAgent : public Error { using Error::Error; };
class DuplicateAgent : public Error { using Error::Error; };
class MissingAction : public Error { using Error::Error; };
class InvalidAction : public Error { using Error::Error; };
class EpisodeOver : public Error { using Error::Error; };
class ZeroDuration : public Error { using Error::Error; };
class ScenarioError : public Error { using Error::Error; };
class CallbackViolation : public Error { using Error::Error; };

/// Configuration rejected; carries one diagnostic per offending field.
class ConfigError : public Error {
public:
    explicit ConfigError(std::vector<std::string> diagnostics)
        : Error(join(diagnostics)), diagnostics_(std::move(diagnostics)) {}

    const std::vector<std::string>& diagnostics() const noexcept { return diagnostics_; }

private:
    static std::string join(const std::vector<std::string>& d) {
        std::string out = "invalid configuration:";
        for (const auto& s : d) {
            out += "\n  ";
            out += s;
        }
        return out;
    }

    std::vector<std::string> diagnostics_;
};

// cc-agent
class OutOfRange : public Error { using Error::Error; };

// trainer
class NonFiniteLoss : public Error { using Error::Error; };
class IndexOutOfRange : public Error { using Error::Error; };
class CorruptCheckpoint : public Error { using Error::Error; };

} // namespace stepnet
