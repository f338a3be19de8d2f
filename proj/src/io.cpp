#include "adlab/io.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <vector>

namespace adlab::io {

namespace {

using nlohmann::ordered_json;

std::uint64_t read_le(const unsigned char* p, std::size_t bytes) {
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return v;
}

void write_le(std::string& out, std::uint64_t v, std::size_t bytes) {
    for (std::size_t i = 0; i < bytes; ++i)
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::string read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ParseError(ParseError::Kind::Io, "cannot open " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return bytes;
}

}  // namespace

const char* ParseError::kind_name(Kind kind) {
    switch (kind) {
        case Kind::Io: return "io";
        case Kind::BadMagic: return "bad-magic";
        case Kind::BadHeader: return "bad-header";
        case Kind::TruncatedPayload: return "truncated-payload";
        case Kind::Schema: return "schema";
        case Kind::RowRange: return "row-range";
        case Kind::RoleTarget: return "role-target";
        case Kind::Data: return "data";
    }
    return "unknown";
}

EmbeddingMatrix read_embf(const std::filesystem::path& path) {
    const std::string bytes = read_file_bytes(path);
    if (bytes.size() < kEmbfHeaderBytes)
        throw ParseError(ParseError::Kind::BadHeader,
                         path.string() + ": header needs " + std::to_string(kEmbfHeaderBytes) +
                             " bytes, file has " + std::to_string(bytes.size()));
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    if (!std::equal(kEmbfMagic, kEmbfMagic + 4, bytes.data()))
        throw ParseError(ParseError::Kind::BadMagic,
                         path.string() + ": bad magic, expected \"ADEM\"");
    const auto version = static_cast<std::uint16_t>(read_le(p + 4, 2));
    if (version != kEmbfVersion)
        throw ParseError(ParseError::Kind::BadHeader,
                         path.string() + ": unsupported version " + std::to_string(version));
    const auto dtype = static_cast<std::uint8_t>(p[6]);
    if (dtype != kEmbfDtypeF32)
        throw ParseError(ParseError::Kind::BadHeader,
                         path.string() + ": unsupported dtype " + std::to_string(dtype));
    if (p[7] != 0)
        throw ParseError(ParseError::Kind::BadHeader, path.string() + ": reserved byte not zero");
    const auto dim = static_cast<std::uint32_t>(read_le(p + 8, 4));
    const std::uint64_t count = read_le(p + 12, 8);
    if (dim == 0)
        throw ParseError(ParseError::Kind::BadHeader, path.string() + ": dim must be >= 1");

    const std::uint64_t expected = count * static_cast<std::uint64_t>(dim) * 4;
    const std::uint64_t actual = bytes.size() - kEmbfHeaderBytes;
    if (actual != expected)
        throw ParseError(ParseError::Kind::TruncatedPayload,
                         path.string() + ": expected " + std::to_string(expected) +
                             " payload bytes, found " + std::to_string(actual));

    std::vector<float> data(static_cast<std::size_t>(count) * dim);
    const unsigned char* payload = p + kEmbfHeaderBytes;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto u = static_cast<std::uint32_t>(read_le(payload + 4 * i, 4));
        data[i] = std::bit_cast<float>(u);
    }
    return EmbeddingMatrix(static_cast<std::size_t>(count), dim, std::move(data));
}

void write_embf(const std::filesystem::path& path, const EmbeddingMatrix& matrix) {
    std::string out;
    out.reserve(kEmbfHeaderBytes + matrix.data().size() * 4);
    out.append(kEmbfMagic, 4);
    write_le(out, kEmbfVersion, 2);
    out.push_back(static_cast<char>(kEmbfDtypeF32));
    out.push_back('\0');
    write_le(out, matrix.cols(), 4);
    write_le(out, matrix.rows(), 8);
    for (float v : matrix.data()) write_le(out, std::bit_cast<std::uint32_t>(v), 4);

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw ParseError(ParseError::Kind::Io, "cannot write " + path.string());
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw ParseError(ParseError::Kind::Io, "write failed for " + path.string());
}

WorldPaths world_paths(const std::filesystem::path& dir) {
    return WorldPaths{dir / "manifest.jsonl", dir / "images.embf", dir / "texts.embf"};
}

Dataset read_world(const std::filesystem::path& manifest_path,
                   const std::filesystem::path& image_embf_path,
                   const std::filesystem::path& text_embf_path) {
    EmbeddingMatrix image = read_embf(image_embf_path);
    EmbeddingMatrix text = read_embf(text_embf_path);

    std::ifstream in(manifest_path);
    if (!in) throw ParseError(ParseError::Kind::Io, "cannot open " + manifest_path.string());

    std::vector<Sample> samples;
    std::vector<std::size_t> lines;  // manifest line per sample, for messages
    std::vector<std::string> names;
    std::string line;
    std::size_t line_no = 0;

    auto schema_error = [&](const std::string& what) {
        return ParseError(ParseError::Kind::Schema,
                          manifest_path.string() + ":" + std::to_string(line_no) + ": " + what);
    };

    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json rec;
        try {
            rec = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw schema_error(std::string("not valid JSON: ") + e.what());
        }
        if (!rec.is_object()) throw schema_error("record is not a JSON object");

        Sample s;
        if (!rec.contains("id") || !rec["id"].is_number_unsigned())
            throw schema_error("missing or invalid \"id\"");
        s.id = rec["id"].get<std::uint64_t>();
        if (!rec.contains("concept") || !rec["concept"].is_number_unsigned())
            throw schema_error("missing or invalid \"concept\"");
        s.concept_id = ConceptId{rec["concept"].get<std::uint32_t>()};
        if (!rec.contains("role") || !rec["role"].is_string())
            throw schema_error("missing or invalid \"role\"");
        const std::string role = rec["role"].get<std::string>();
        if (role == "poison") {
            s.role = Role::Poison;
            if (!rec.contains("target") || !rec["target"].is_number_unsigned())
                throw schema_error("poison record missing \"target\"");
            s.target_concept = ConceptId{rec["target"].get<std::uint32_t>()};
        } else if (role == "benign") {
            s.role = Role::Benign;
            if (rec.contains("target")) throw schema_error("benign record carries \"target\"");
        } else {
            throw schema_error("role must be \"benign\" or \"poison\", got \"" + role + "\"");
        }
        if (!rec.contains("image_row") || !rec["image_row"].is_number_unsigned())
            throw schema_error("missing or invalid \"image_row\"");
        s.image_row = rec["image_row"].get<std::uint64_t>();
        if (!rec.contains("text_row") || !rec["text_row"].is_number_unsigned())
            throw schema_error("missing or invalid \"text_row\"");
        s.text_row = rec["text_row"].get<std::uint64_t>();

        if (rec.contains("concept_name")) {
            if (!rec["concept_name"].is_string()) throw schema_error("concept_name must be a string");
            const auto cid = s.concept_id.value;
            if (names.size() <= cid) names.resize(cid + 1);
            if (names[cid].empty()) names[cid] = rec["concept_name"].get<std::string>();
        }
        samples.push_back(std::move(s));
        lines.push_back(line_no);
    }
    if (samples.empty())
        throw ParseError(ParseError::Kind::Schema, manifest_path.string() + ": no records");

    for (std::size_t i = 0; i < samples.size(); ++i) {
        const Sample& s = samples[i];
        const std::string where = " (manifest line " + std::to_string(lines[i]) + ")";
        if (s.image_row >= image.rows())
            throw ParseError(ParseError::Kind::RowRange,
                             "image_row " + std::to_string(s.image_row) + " out of range, " +
                                 std::to_string(image.rows()) + " rows" + where);
        if (s.text_row >= text.rows())
            throw ParseError(ParseError::Kind::RowRange,
                             "text_row " + std::to_string(s.text_row) + " out of range, " +
                                 std::to_string(text.rows()) + " rows" + where);
        if (s.role == Role::Poison && *s.target_concept == s.concept_id)
            throw ParseError(ParseError::Kind::RoleTarget,
                             "poison target equals its concept" + where);
    }

    Dataset dataset(std::move(samples), std::move(image), std::move(text), std::move(names));
    const auto& counts = dataset.per_concept_counts();
    for (std::size_t c = 0; c < counts.size(); ++c)
        if (counts[c].poisoned > 0 && counts[c].poisoned >= counts[c].total)
            throw ParseError(ParseError::Kind::RoleTarget,
                             "concept " + std::to_string(c) + " is fully poisoned (m=" +
                                 std::to_string(counts[c].poisoned) +
                                 ", n=" + std::to_string(counts[c].total) + ")");

    for (float v : dataset.image_matrix().data())
        if (!std::isfinite(v))
            throw ParseError(ParseError::Kind::Data,
                             image_embf_path.string() + ": non-finite component");
    for (float v : dataset.text_matrix().data())
        if (!std::isfinite(v))
            throw ParseError(ParseError::Kind::Data,
                             text_embf_path.string() + ": non-finite component");

    return dataset;
}

Dataset read_world_dir(const std::filesystem::path& dir) {
    const WorldPaths paths = world_paths(dir);
    return read_world(paths.manifest, paths.image_embf, paths.text_embf);
}

WorldPaths write_world(const Dataset& dataset, const std::filesystem::path& dir) {
    if (dataset.size() == 0) throw InvalidInput("write_world: refusing to write an empty dataset");
    std::filesystem::create_directories(dir);
    const WorldPaths paths = world_paths(dir);

    write_embf(paths.image_embf, dataset.image_matrix());
    write_embf(paths.text_embf, dataset.text_matrix());

    std::ofstream out(paths.manifest, std::ios::binary | std::ios::trunc);
    if (!out) throw ParseError(ParseError::Kind::Io, "cannot write " + paths.manifest.string());
    const auto& names = dataset.concept_names();
    for (const Sample& s : dataset.samples()) {
        ordered_json rec;
        rec["id"] = s.id;
        rec["concept"] = s.concept_id.value;
        if (s.concept_id.value < names.size() && !names[s.concept_id.value].empty())
            rec["concept_name"] = names[s.concept_id.value];
        rec["role"] = s.role == Role::Poison ? "poison" : "benign";
        if (s.role == Role::Poison) rec["target"] = s.target_concept->value;
        rec["image_row"] = static_cast<std::uint64_t>(s.image_row);
        rec["text_row"] = static_cast<std::uint64_t>(s.text_row);
        out << rec.dump() << '\n';
    }
    if (!out) throw ParseError(ParseError::Kind::Io, "write failed for " + paths.manifest.string());
    return paths;
}

std::string fnv1a64_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(ParseError::Kind::Io, "cannot open " + path.string());
    std::uint64_t hash = 14695981039346656037ULL;
    char buf[65536];
    while (in) {
        in.read(buf, sizeof buf);
        const std::streamsize got = in.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            hash ^= static_cast<unsigned char>(buf[i]);
            hash *= 1099511628211ULL;
        }
    }
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(hash));
    return std::string(hex);
}

nlohmann::ordered_json report_document(const ADReport& report, const MetricConfig& config,
                                       const ReportInputs& inputs, double wall_time_seconds) {
    ordered_json doc;
    doc["tool_version"] = kToolVersion;
    doc["metric"] = {
        {"kind", config.kind == MetricKind::ContinuousCosine ? "cosine" : "binary"},
        {"alpha", config.alpha},
    };
    doc["feature_ad"] = report.feature_ad;
    doc["structure_ad"] = report.structure_ad;
    ordered_json combined = ordered_json::object();
    for (const auto& [alpha, value] : report.combined)
        combined[nlohmann::json(alpha).dump()] = value;
    doc["combined"] = std::move(combined);
    if (report.estimator.mode == EstimatorMode::Sampled) {
        doc["estimator"] = {
            {"mode", "sampled"},
            {"pair_budget", report.estimator.pair_budget},
            {"seed", report.estimator.seed},
            {"stderr_estimate", report.estimator.stderr_estimate},
        };
    } else {
        doc["estimator"] = {{"mode", "exact"}};
    }
    doc["pair_count"] = report.pair_count;
    doc["wall_time_seconds"] = wall_time_seconds;
    doc["input_digests"] = {
        {"manifest", inputs.manifest_digest},
        {"images", inputs.image_digest},
        {"texts", inputs.text_digest},
    };
    return doc;
}

void write_report(const std::filesystem::path& path, const nlohmann::ordered_json& document) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ParseError(ParseError::Kind::Io, "cannot write " + path.string());
    out << document.dump(2) << '\n';
    if (!out) throw ParseError(ParseError::Kind::Io, "write failed for " + path.string());
}

}  // namespace adlab::io
