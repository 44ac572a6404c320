#include "voxseg/fileio.hpp"

#include <fstream>
#include <mutex>

#include <openssl/evp.h>
#include <zlib.h>
#include <nlohmann/json.hpp>

#include "voxseg/errors.hpp"

namespace voxseg::io {

namespace {

std::mutex g_hook_mutex;
AuditHook g_hook;

}  // namespace

void set_audit_hook(AuditHook hook) {
    std::lock_guard lock(g_hook_mutex);
    g_hook = std::move(hook);
}

void clear_audit_hook() {
    std::lock_guard lock(g_hook_mutex);
    g_hook = nullptr;
}

void notify_audit(const std::filesystem::path& path) {
    AuditHook hook;
    {
        std::lock_guard lock(g_hook_mutex);
        hook = g_hook;
    }
    if (hook) hook(path);
}

std::vector<uint8_t> read_file_bytes(const std::filesystem::path& path) {
    notify_audit(path);
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file: " + path.string());
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("read failed: " + path.string());
    return bytes;
}

std::vector<uint8_t> read_file_bytes_decompressed(const std::filesystem::path& path) {
    notify_audit(path);
    gzFile f = gzopen(path.string().c_str(), "rb");
    if (!f) throw IoError("cannot open file: " + path.string());
    std::vector<uint8_t> out;
    std::vector<uint8_t> buf(1 << 20);
    int n;
    while ((n = gzread(f, buf.data(), static_cast<unsigned>(buf.size()))) > 0)
        out.insert(out.end(), buf.begin(), buf.begin() + n);
    bool ok = (n == 0);
    gzclose(f);
    if (!ok) throw ParseError("gzip decompression failed: " + path.string());
    return out;
}

void write_file_bytes(const std::filesystem::path& path, const void* data, size_t size) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open file for writing: " + path.string());
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
    if (!out) throw IoError("write failed: " + path.string());
}

void write_file_bytes_gzip(const std::filesystem::path& path, const void* data, size_t size) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    // Fixed compression level; zlib writes mtime 0, so output bytes are
    // reproducible for identical payloads.
    gzFile f = gzopen(path.string().c_str(), "wb6");
    if (!f) throw IoError("cannot open file for writing: " + path.string());
    const char* p = static_cast<const char*>(data);
    size_t remaining = size;
    while (remaining > 0) {
        unsigned chunk = static_cast<unsigned>(std::min<size_t>(remaining, 1u << 30));
        int written = gzwrite(f, p, chunk);
        if (written <= 0) {
            gzclose(f);
            throw IoError("gzip write failed: " + path.string());
        }
        p += written;
        remaining -= static_cast<size_t>(written);
    }
    if (gzclose(f) != Z_OK) throw IoError("gzip close failed: " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
    auto bytes = read_file_bytes(path);
    return std::string(bytes.begin(), bytes.end());
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    write_file_bytes(path, text.data(), text.size());
}

std::string sha256_hex(const void* data, size_t size) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (!EVP_Digest(data, size, digest, &len, EVP_sha256(), nullptr))
        throw IoError("sha256 digest failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

std::string sha256_hex(const std::vector<uint8_t>& bytes) { return sha256_hex(bytes.data(), bytes.size()); }
std::string sha256_hex(const std::string& text) { return sha256_hex(text.data(), text.size()); }

std::string hash_file_decompressed(const std::filesystem::path& path) {
    return sha256_hex(read_file_bytes_decompressed(path));
}

std::string canonical_json(const nlohmann::json& j) { return j.dump(2) + "\n"; }

void write_canonical_json(const std::filesystem::path& path, const nlohmann::json& j) {
    write_text_file(path, canonical_json(j));
}

nlohmann::json read_json(const std::filesystem::path& path) {
    const std::string text = read_text_file(path);
    nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded()) throw ParseError("invalid JSON: " + path.string());
    return j;
}

}  // namespace voxseg::io
