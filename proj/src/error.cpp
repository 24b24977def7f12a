#include "latentme/error.hpp"

namespace latentme {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::ZeroVariance: return "ZeroVariance";
        case ErrorCode::RankDeficient: return "RankDeficient";
        case ErrorCode::InstrumentIrrelevant: return "InstrumentIrrelevant";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::DegenerateSpectrum: return "DegenerateSpectrum";
        case ErrorCode::AllSameResponse: return "AllSameResponse";
        case ErrorCode::NonBinaryColumn: return "NonBinaryColumn";
        case ErrorCode::MissingData: return "MissingData";
        case ErrorCode::TooFewRows: return "TooFewRows";
        case ErrorCode::ExceedsCap: return "ExceedsCap";
        case ErrorCode::KTooLarge: return "KTooLarge";
        case ErrorCode::NegativeSplitCorrelation: return "NegativeSplitCorrelation";
        case ErrorCode::OutOfRange: return "OutOfRange";
        case ErrorCode::AllPartitionsFailed: return "AllPartitionsFailed";
        case ErrorCode::MissingPosterior: return "MissingPosterior";
        case ErrorCode::TooManyFailures: return "TooManyFailures";
        case ErrorCode::CellFailed: return "CellFailed";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::ParseError: return "ParseError";
    }
    return "Unknown";
}

std::string_view to_string(WarningCode code) {
    switch (code) {
        case WarningCode::WeakInstrument: return "WeakInstrument";
        case WarningCode::WeakSplit: return "WeakSplit";
        case WarningCode::NotConverged: return "NotConverged";
        case WarningCode::FewRowsForPca: return "FewRowsForPca";
        case WarningCode::PartitionFailed: return "PartitionFailed";
    }
    return "Unknown";
}

}  // namespace latentme
