#!/usr/bin/env python3
"""Assemble reference RV32I instructions with clang's integrated assembler.

Prints one `<word-hex>  <asm>` line per instruction. The words are frozen
into assembled_reference.txt, which the encoder tests read as the
independent encoding oracle.
"""
import struct
import subprocess
import sys
import tempfile
from pathlib import Path

INSTRUCTIONS = [
    "addi x0, x0, 0",
    "add x1, x2, x3",
    "sub x5, x6, x7",
    "lui x5, 0",
    "auipc x10, 0x12345",
    "slli x3, x4, 5",
    "srai x8, x9, 31",
    "sltiu x14, x15, -1",
    "xori x16, x17, 0x555",
    "lw x11, -4(x2)",
    "lbu x20, 2047(x21)",
    "sb x12, 7(x13)",
    "sh x22, -2048(x23)",
    "beq x1, x2, 16",
    "bgeu x24, x25, -8",
    "jal x1, 2048",
    "jalr x0, 0(x1)",
    "fence.i",
    "ecall",
    "ebreak",
    "mret",
    "csrrw x1, 0x341, x2",
    "csrrs x3, 0x800, x0",
    "csrrc x4, 0x300, x5",
]


def text_section(elf: bytes) -> bytes:
    # ELF32 little-endian section header walk.
    shoff = struct.unpack_from("<I", elf, 0x20)[0]
    shentsize, shnum, shstrndx = struct.unpack_from("<HHH", elf, 0x2E)
    def hdr(i):
        return struct.unpack_from("<IIIIIIIIII", elf, shoff + i * shentsize)
    strtab = hdr(shstrndx)
    for i in range(shnum):
        h = hdr(i)
        name_off = strtab[4] + h[0]
        name = elf[name_off:elf.index(b"\0", name_off)].decode()
        if name == ".text":
            return elf[h[4]:h[4] + h[5]]
    raise RuntimeError("no .text")


def main() -> int:
    with tempfile.TemporaryDirectory() as tmp:
        src = Path(tmp) / "t.s"
        obj = Path(tmp) / "t.o"
        src.write_text(".option norelax\n" + "\n".join(INSTRUCTIONS) + "\n")
        subprocess.run(["clang", "--target=riscv32", "-march=rv32i", "-c",
                        str(src), "-o", str(obj)], check=True)
        text = text_section(obj.read_bytes())
    words = struct.unpack(f"<{len(text) // 4}I", text)
    for w, asm in zip(words, INSTRUCTIONS):
        print(f"0x{w:08X}  {asm}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
