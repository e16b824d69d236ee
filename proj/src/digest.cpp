#include "unim/digest.hpp"

#include <openssl/evp.h>

#include <fstream>
#include <sstream>

#include "unim/common.hpp"

namespace unim::digest {

std::string sha256_hex(const std::string& bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int md_len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (ctx == nullptr) throw Error("sha256: EVP context allocation failed");
    int ok = EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) &&
             EVP_DigestUpdate(ctx, bytes.data(), bytes.size()) &&
             EVP_DigestFinal_ex(ctx, md, &md_len);
    EVP_MD_CTX_free(ctx);
    if (!ok) throw Error("sha256: digest computation failed");

    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * md_len);
    for (unsigned int i = 0; i < md_len; ++i) {
        out.push_back(hex[md[i] >> 4]);
        out.push_back(hex[md[i] & 0xf]);
    }
    return out;
}

std::string sha256_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestError("cannot open file for digest: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return sha256_hex(buf.str());
}

}  // namespace unim::digest
