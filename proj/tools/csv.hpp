#pragma once

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "spde/errors.hpp"

namespace spde_lab {

/// CSV writer with a fixed header; floating-point cells carry 17 significant
/// digits so output is byte-stable across runs.
class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::vector<std::string>& header)
        : out_(path) {
        if (!out_) {
            throw spde::ConfigError("cannot open output file \"" + path + "\"");
        }
        for (std::size_t i = 0; i < header.size(); ++i) {
            out_ << (i ? "," : "") << header[i];
        }
        out_ << "\n";
    }

    void row(const std::vector<double>& values) {
        char buffer[40];
        for (std::size_t i = 0; i < values.size(); ++i) {
            std::snprintf(buffer, sizeof(buffer), "%.17g", values[i]);
            out_ << (i ? "," : "") << buffer;
        }
        out_ << "\n";
    }

private:
    std::ofstream out_;
};

}  // namespace spde_lab
