#pragma once

#include <stdexcept>
#include <string>

namespace insight {

struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct data_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Parameter overflow during training. The trainer annotates the trial index.
struct divergence_error : std::runtime_error {
    divergence_error(const std::string& param, double value, long trial = -1)
        : std::runtime_error("parameter " + param + " diverged to " +
                             std::to_string(value) +
                             (trial >= 0 ? " at trial " + std::to_string(trial) : "")),
          parameter(param), bad_value(value), trial_index(trial) {}

    std::string parameter;
    double bad_value;
    long trial_index;
};

}  // namespace insight
