#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <span>
#include <vector>

#include "edgesec/flow.hpp"
#include "edgesec/result.hpp"

namespace edgesec::trust {

// Sizes are fixed so that frames carrying a cert + detached signature are
// bit-exact. They match ed25519: 32-byte verify keys, 64-byte signatures.
inline constexpr std::size_t kPublicKeySize = 32;
inline constexpr std::size_t kSecretKeySize = 64;
inline constexpr std::size_t kSignatureSize = 64;
inline constexpr std::size_t kCertificateSize = 4 + kPublicKeySize + 8 + kSignatureSize;  // 108

using PublicKey = std::array<std::uint8_t, kPublicKeySize>;
using SecretKey = std::array<std::uint8_t, kSecretKeySize>;
using Signature = std::array<std::uint8_t, kSignatureSize>;

struct KeyPair {
  PublicKey public_key{};
  SecretKey secret_key{};
};

/// CA-signed binding of (subject_id, public_key, issued_at). Closed-world:
/// one root, no chains.
struct Certificate {
  std::uint32_t subject_id = 0;
  PublicKey key{};
  Tick issued_at = 0;
  Signature ca_sig{};

  bool operator==(const Certificate&) const = default;
};

std::array<std::uint8_t, kCertificateSize> encode_certificate(const Certificate& cert);
Certificate decode_certificate(std::span<const std::uint8_t> bytes);  // pre: size == kCertificateSize

/// Detached signature over arbitrary canonical bytes. Deterministic: the same
/// key and message always produce the same signature.
Signature sign(const SecretKey& key, std::span<const std::uint8_t> message);

/// Total: returns false for any tampered message, signature, or wrong key.
bool verify_signature(const PublicKey& key, std::span<const std::uint8_t> message,
                      const Signature& sig);

/// Structural cert check against a root key (no revocation knowledge).
bool certificate_valid(const PublicKey& ca_root, const Certificate& cert);

enum class CaError : std::uint8_t {
  DuplicateSubject,
  UnknownSubject,
};

struct Enrollment {
  KeyPair keys;
  Certificate cert;
};

/// The certification authority: issues keypairs and certs at registration,
/// revokes identities, and verifies with revocation folded in. Key material
/// is derived from the seed, so runs replay exactly.
class CertAuthority {
 public:
  explicit CertAuthority(std::uint64_t seed);

  Result<Enrollment, CaError> register_subject(std::uint32_t subject_id, Tick now);
  Status<CaError> revoke(std::uint32_t subject_id);

  bool is_registered(std::uint32_t subject_id) const { return issued_.count(subject_id) > 0; }
  bool is_revoked(std::uint32_t subject_id) const { return revoked_.count(subject_id) > 0; }

  /// Root validity AND not revoked AND signature valid under the cert's key.
  bool verify(const Certificate& cert, std::span<const std::uint8_t> message,
              const Signature& sig) const;

  const PublicKey& root_public_key() const { return root_.public_key; }

  /// Invoked synchronously on every revocation (the cloud hooks this to
  /// update its blacklist).
  void set_revoke_hook(std::function<void(std::uint32_t)> hook) { revoke_hook_ = std::move(hook); }

 private:
  KeyPair root_;
  std::uint64_t key_stream_;
  std::map<std::uint32_t, Certificate> issued_;
  std::set<std::uint32_t> revoked_;
  std::function<void(std::uint32_t)> revoke_hook_;
};

}  // namespace edgesec::trust
