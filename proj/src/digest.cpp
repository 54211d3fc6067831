#include "aspecteval/digest.hpp"

#include <fstream>
#include <memory>
#include <stdexcept>

#include <openssl/evp.h>

namespace aspecteval::digest {

namespace {

struct Sha256Ctx {
    Sha256Ctx() : ctx(EVP_MD_CTX_new()) {
        if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1)
            throw std::runtime_error("sha256 init failed");
    }
    ~Sha256Ctx() { EVP_MD_CTX_free(ctx); }
    void update(const char* data, std::size_t len) {
        if (EVP_DigestUpdate(ctx, data, len) != 1)
            throw std::runtime_error("sha256 update failed");
    }
    std::string finish() {
        unsigned char out[EVP_MAX_MD_SIZE];
        unsigned int out_len = 0;
        if (EVP_DigestFinal_ex(ctx, out, &out_len) != 1)
            throw std::runtime_error("sha256 final failed");
        static const char* hex = "0123456789abcdef";
        std::string result;
        result.reserve(out_len * 2);
        for (unsigned int i = 0; i < out_len; ++i) {
            result.push_back(hex[out[i] >> 4]);
            result.push_back(hex[out[i] & 0xf]);
        }
        return result;
    }
    EVP_MD_CTX* ctx;
};

}  // namespace

std::string sha256_hex(std::string_view data) {
    Sha256Ctx ctx;
    ctx.update(data.data(), data.size());
    return ctx.finish();
}

std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    Sha256Ctx ctx;
    char buf[1 << 16];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0)
        ctx.update(buf, static_cast<std::size_t>(in.gcount()));
    return ctx.finish();
}

}  // namespace aspecteval::digest
