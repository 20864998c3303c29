#include "edgesec/trust.hpp"

#include <sodium.h>

#include <algorithm>
#include <stdexcept>

#include "edgesec/bytes.hpp"

namespace edgesec::trust {

namespace {

void ensure_sodium() {
  static const int rc = sodium_init();
  if (rc < 0) throw std::runtime_error("libsodium initialization failed");
}

// splitmix64: seed expansion for deterministic key material.
std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

KeyPair keypair_from_stream(std::uint64_t& stream) {
  ensure_sodium();
  std::array<std::uint8_t, crypto_sign_SEEDBYTES> seed{};
  for (std::size_t i = 0; i < seed.size(); i += 8) {
    std::uint64_t word = splitmix64(stream);
    for (std::size_t j = 0; j < 8 && i + j < seed.size(); ++j)
      seed[i + j] = static_cast<std::uint8_t>(word >> (8 * j));
  }
  KeyPair kp;
  crypto_sign_seed_keypair(kp.public_key.data(), kp.secret_key.data(), seed.data());
  return kp;
}

std::array<std::uint8_t, 44> cert_signing_bytes(const Certificate& cert) {
  std::vector<std::uint8_t> buf;
  buf.reserve(44);
  ByteWriter w(buf);
  w.u32(cert.subject_id);
  w.bytes(cert.key);
  w.u64(cert.issued_at);
  std::array<std::uint8_t, 44> out{};
  std::copy(buf.begin(), buf.end(), out.begin());
  return out;
}

}  // namespace

std::array<std::uint8_t, kCertificateSize> encode_certificate(const Certificate& cert) {
  std::vector<std::uint8_t> buf;
  buf.reserve(kCertificateSize);
  ByteWriter w(buf);
  w.u32(cert.subject_id);
  w.bytes(cert.key);
  w.u64(cert.issued_at);
  w.bytes(cert.ca_sig);
  std::array<std::uint8_t, kCertificateSize> out{};
  std::copy(buf.begin(), buf.end(), out.begin());
  return out;
}

Certificate decode_certificate(std::span<const std::uint8_t> bytes) {
  Certificate cert;
  if (bytes.size() != kCertificateSize) return cert;
  ByteReader r(bytes);
  cert.subject_id = r.u32();
  auto key = r.bytes(kPublicKeySize);
  std::copy(key.begin(), key.end(), cert.key.begin());
  cert.issued_at = r.u64();
  auto sig = r.bytes(kSignatureSize);
  std::copy(sig.begin(), sig.end(), cert.ca_sig.begin());
  return cert;
}

Signature sign(const SecretKey& key, std::span<const std::uint8_t> message) {
  ensure_sodium();
  Signature sig{};
  crypto_sign_detached(sig.data(), nullptr, message.data(), message.size(), key.data());
  return sig;
}

bool verify_signature(const PublicKey& key, std::span<const std::uint8_t> message,
                      const Signature& sig) {
  ensure_sodium();
  return crypto_sign_verify_detached(sig.data(), message.data(), message.size(), key.data()) == 0;
}

bool certificate_valid(const PublicKey& ca_root, const Certificate& cert) {
  auto bytes = cert_signing_bytes(cert);
  return verify_signature(ca_root, bytes, cert.ca_sig);
}

CertAuthority::CertAuthority(std::uint64_t seed) : key_stream_(seed ^ 0xA5A5A5A5DEADBEEFull) {
  root_ = keypair_from_stream(key_stream_);
}

Result<Enrollment, CaError> CertAuthority::register_subject(std::uint32_t subject_id, Tick now) {
  if (issued_.count(subject_id) > 0) return CaError::DuplicateSubject;
  Enrollment enrollment;
  enrollment.keys = keypair_from_stream(key_stream_);
  enrollment.cert.subject_id = subject_id;
  enrollment.cert.key = enrollment.keys.public_key;
  enrollment.cert.issued_at = now;
  enrollment.cert.ca_sig = sign(root_.secret_key, cert_signing_bytes(enrollment.cert));
  issued_[subject_id] = enrollment.cert;
  return enrollment;
}

Status<CaError> CertAuthority::revoke(std::uint32_t subject_id) {
  if (issued_.count(subject_id) == 0) return CaError::UnknownSubject;
  revoked_.insert(subject_id);
  if (revoke_hook_) revoke_hook_(subject_id);
  return std::monostate{};
}

bool CertAuthority::verify(const Certificate& cert, std::span<const std::uint8_t> message,
                           const Signature& sig) const {
  if (is_revoked(cert.subject_id)) return false;
  if (!certificate_valid(root_.public_key, cert)) return false;
  return verify_signature(cert.key, message, sig);
}

}  // namespace edgesec::trust
