"""Independent computation of the IdHash for synthetic identity (index, seed).

Run: python3 scripts/id_hash_vector.py 3 7
The printed digest is frozen in crates/core/tests/vectors.rs.
"""
import hashlib
import struct
import sys


def lp(b: bytes) -> bytes:
    return struct.pack(">I", len(b)) + b


def id_hash(index: int, seed: int) -> str:
    vc_id = hashlib.sha256(b"posc/vc-id" + struct.pack("<Q", seed) + struct.pack("<Q", index)).digest()
    text = [
        f"Given{index:06}x{seed}",
        f"Family{index:06}x{seed}",
        f"{index} Synthetic Street, Town {seed}",
        f"BN{seed:04}{index:08}",
        f"Birthplace{index:05}",
        "Simland",
    ]
    data = b"".join(lp(t.encode()) for t in text)
    data += lp(vc_id) + lp(b"2024-01-01") + lp(b"2034-01-01")
    return hashlib.sha256(data).hexdigest()


if __name__ == "__main__":
    print(id_hash(int(sys.argv[1]), int(sys.argv[2])))
