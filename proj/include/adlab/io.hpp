#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "adlab/engine.hpp"
#include "adlab/types.hpp"

#include <json.hpp>

namespace adlab::io {

inline constexpr const char* kToolVersion = "0.1.0";

// embf: 20-byte header (magic "ADEM", u16 version=1, u8 dtype=1 for f32,
// u8 reserved=0, u32 dim, u64 count, all little-endian) followed by
// count*dim little-endian f32 values, row-major.
inline constexpr char kEmbfMagic[4] = {'A', 'D', 'E', 'M'};
inline constexpr std::uint16_t kEmbfVersion = 1;
inline constexpr std::uint8_t kEmbfDtypeF32 = 1;
inline constexpr std::size_t kEmbfHeaderBytes = 20;

class ParseError : public std::runtime_error {
public:
    enum class Kind {
        Io,
        BadMagic,
        BadHeader,
        TruncatedPayload,
        Schema,
        RowRange,
        RoleTarget,
        Data,
    };

    ParseError(Kind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    Kind kind() const { return kind_; }
    static const char* kind_name(Kind kind);

private:
    Kind kind_;
};

EmbeddingMatrix read_embf(const std::filesystem::path& path);
void write_embf(const std::filesystem::path& path, const EmbeddingMatrix& matrix);

struct WorldPaths {
    std::filesystem::path manifest;
    std::filesystem::path image_embf;
    std::filesystem::path text_embf;
};

// Conventional file names inside a world directory.
WorldPaths world_paths(const std::filesystem::path& dir);

// Parses the manifest (one JSON record per line) against the two embedding
// files and returns a structurally valid dataset. Errors carry a byte- or
// line-accurate message and a distinct kind.
Dataset read_world(const std::filesystem::path& manifest_path,
                   const std::filesystem::path& image_embf_path,
                   const std::filesystem::path& text_embf_path);
Dataset read_world_dir(const std::filesystem::path& dir);

// Deterministic encoding: fixed manifest field order, raw float bits.
// Refuses empty datasets.
WorldPaths write_world(const Dataset& dataset, const std::filesystem::path& dir);

// FNV-1a 64-bit digest of a file's bytes, as 16 hex digits.
std::string fnv1a64_file(const std::filesystem::path& path);

struct ReportInputs {
    std::string manifest_digest;
    std::string image_digest;
    std::string text_digest;
};

nlohmann::ordered_json report_document(const ADReport& report, const MetricConfig& config,
                                       const ReportInputs& inputs, double wall_time_seconds);

void write_report(const std::filesystem::path& path, const nlohmann::ordered_json& document);

}  // namespace adlab::io
