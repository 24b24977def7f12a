#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace latentme {

enum class ErrorCode {
    ZeroVariance,
    RankDeficient,
    InstrumentIrrelevant,
    DimensionMismatch,
    DegenerateSpectrum,
    AllSameResponse,
    NonBinaryColumn,
    MissingData,
    TooFewRows,
    ExceedsCap,
    KTooLarge,
    NegativeSplitCorrelation,
    OutOfRange,
    AllPartitionsFailed,
    MissingPosterior,
    TooManyFailures,
    CellFailed,
    InvalidArgument,
    ParseError,
};

enum class WarningCode {
    WeakInstrument,
    WeakSplit,
    NotConverged,
    FewRowsForPca,
    PartitionFailed,
};

std::string_view to_string(ErrorCode code);
std::string_view to_string(WarningCode code);

/// Exception carrying a machine-readable code alongside the message.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

struct Warning {
    WarningCode code;
    std::string message;

    std::string describe() const { return std::string(to_string(code)) + ": " + message; }
    friend bool operator==(const Warning&, const Warning&) = default;
};

using Warnings = std::vector<Warning>;

}  // namespace latentme
