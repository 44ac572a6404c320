#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace voxseg::io {

// Every read of an on-disk file in this library funnels through the helpers
// below, which report the path to the audit hook first. Tests install a hook
// to prove that guarded pipeline stages never touch the test partition.
using AuditHook = std::function<void(const std::filesystem::path&)>;

void set_audit_hook(AuditHook hook);
void clear_audit_hook();
void notify_audit(const std::filesystem::path& path);

std::vector<uint8_t> read_file_bytes(const std::filesystem::path& path);

// Transparent gzip: returns the decompressed payload for .gz files and the
// raw bytes otherwise (zlib's gz layer passes plain files through).
std::vector<uint8_t> read_file_bytes_decompressed(const std::filesystem::path& path);

void write_file_bytes(const std::filesystem::path& path, const void* data, size_t size);
void write_file_bytes_gzip(const std::filesystem::path& path, const void* data, size_t size);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

std::string sha256_hex(const void* data, size_t size);
std::string sha256_hex(const std::vector<uint8_t>& bytes);
std::string sha256_hex(const std::string& text);

// SHA-256 of the decompressed payload; the manifest hash contract, so it is
// independent of gzip level and header bytes.
std::string hash_file_decompressed(const std::filesystem::path& path);

// Canonical JSON: sorted keys (nlohmann default), 2-space indent, LF, final
// newline. All plan/manifest/result files use exactly this rendering.
std::string canonical_json(const nlohmann::json& j);
void write_canonical_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace voxseg::io
