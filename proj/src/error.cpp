#include "maptext/error.hpp"

namespace maptext {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::EvenWindow: return "EvenWindow";
    case Errc::WindowTooLarge: return "WindowTooLarge";
    case Errc::TooFewDistinctValues: return "TooFewDistinctValues";
    case Errc::IndexOutOfRange: return "IndexOutOfRange";
    case Errc::ImageTooSmall: return "ImageTooSmall";
    case Errc::ThresholdOutOfRange: return "ThresholdOutOfRange";
    case Errc::BadBlockSize: return "BadBlockSize";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::StaleStageSet: return "StaleStageSet";
    case Errc::EmptyMatrix: return "EmptyMatrix";
    case Errc::UnsupportedFormat: return "UnsupportedFormat";
    case Errc::CorruptFile: return "CorruptFile";
    case Errc::IoError: return "IoError";
    case Errc::NetworkError: return "NetworkError";
    case Errc::HttpStatus: return "HttpStatus";
    case Errc::SchemaError: return "SchemaError";
  }
  return "Unknown";
}

}  // namespace maptext
