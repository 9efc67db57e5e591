"""JIT-compiled kernel loops.

Integer chains and loop indices pass through an empty inline-asm register
barrier (``opaque``). The barrier emits no instruction but stops LLVM from
folding a chain into closed form, reassociating it, or vectorizing a loop
that must stay scalar. Floating-point chains need no barrier: without
fast-math LLVM keeps IEEE evaluation order.

Every kernel takes its trip count first so it matches the ``body(n)``
convention of :mod:`fleetbench.timing`.
"""

from llvmlite import ir
from numba import njit
from numba.extending import intrinsic

UNROLL = 16


@intrinsic
def opaque(typingctx, a):
    def codegen(context, builder, signature, args):
        fty = ir.FunctionType(args[0].type, [args[0].type])
        return builder.asm(fty, "", "=r,0", [args[0]], side_effect=True)

    return a(a), codegen


def _binop(instr, barrier):
    @intrinsic
    def op(typingctx, a, b):
        if a != b:
            return None

        def codegen(context, builder, signature, args):
            r = getattr(builder, instr)(args[0], args[1])
            if barrier:
                fty = ir.FunctionType(r.type, [r.type])
                r = builder.asm(fty, "", "=r,0", [r], side_effect=True)
            return r

        return a(a, b), codegen

    return op


# raw two's-complement ops: wrap instead of trapping, no Python floor semantics
iadd = _binop("add", True)
imul = _binop("mul", True)
idiv = _binop("sdiv", True)
irem = _binop("srem", True)
fadd = _binop("fadd", False)
fsub = _binop("fsub", False)
fmul = _binop("fmul", False)
fdiv = _binop("fdiv", False)


# -- operation latency chains: UNROLL dependent operations per iteration ----

@njit(cache=True)
def chain_iadd(n, x, y):
    for _ in range(n):
        for _k in range(UNROLL):
            x = iadd(x, y)
    return x


@njit(cache=True)
def chain_imul(n, x, y):
    for _ in range(n):
        for _k in range(UNROLL):
            x = imul(x, y)
    return x


@njit(cache=True)
def chain_idiv(n, x, c):
    # x -> c / x settles into a two-cycle around sqrt(c)
    for _ in range(n):
        for _k in range(UNROLL):
            x = idiv(c, x)
    return x


@njit(cache=True)
def chain_irem(n, x, c, k):
    # the + k keeps the divisor >= k; one extra add per remainder
    for _ in range(n):
        for _k in range(UNROLL):
            x = iadd(irem(c, x), k)
    return x


@njit(cache=True)
def chain_fadd(n, x, y):
    for _ in range(n):
        for _k in range(UNROLL // 2):
            x = fadd(x, y)
            x = fsub(x, y)
    return x


@njit(cache=True)
def chain_fmul(n, x, y, w):
    # w ~ 1/y, so the chain neither overflows nor decays to denormals
    for _ in range(n):
        for _k in range(UNROLL // 2):
            x = fmul(x, y)
            x = fmul(x, w)
    return x


@njit(cache=True)
def chain_fdiv(n, x, c):
    for _ in range(n):
        for _k in range(UNROLL):
            x = fdiv(c, x)
    return x


@njit(cache=True)
def bogomflops_passes(n, x, q, r):
    m = x.size
    for _ in range(n):
        for i in range(m):
            j = opaque(i)
            x[j] = x[j] * q + r
    return x[0]


@njit(cache=True)
def null_loop(n):
    i = 0
    for _ in range(n):
        i = opaque(i)
    return i


# -- pointer chase -----------------------------------------------------------

@njit(cache=True)
def chase(n, ring, p):
    for _ in range(n):
        for _k in range(UNROLL):
            p = ring[p]
    return p


# -- STREAM and STREAM2 passes --------------------------------------------------
# The start offset goes through the barrier each pass, so repeated passes of an
# idempotent kernel cannot be merged.

@njit(cache=True)
def stream_copy(n, a, b, c, s):
    for _ in range(n):
        lo = opaque(0)
        for i in range(lo, a.size):
            c[i] = a[i]
    return c[0]


@njit(cache=True)
def stream_scale(n, a, b, c, s):
    for _ in range(n):
        lo = opaque(0)
        for i in range(lo, a.size):
            b[i] = s * a[i]
    return b[0]


@njit(cache=True)
def stream_add(n, a, b, c, s):
    for _ in range(n):
        lo = opaque(0)
        for i in range(lo, a.size):
            c[i] = a[i] + b[i]
    return c[0]


@njit(cache=True)
def stream_triad(n, a, b, c, s):
    for _ in range(n):
        lo = opaque(0)
        for i in range(lo, a.size):
            a[i] = b[i] + s * c[i]
    return a[0]


@njit(cache=True)
def stream2_fill(n, a, b, q):
    for _ in range(n):
        lo = opaque(0)
        for i in range(lo, a.size):
            a[i] = q
    return a[0]


@njit(cache=True)
def stream2_copy(n, a, b, q):
    for _ in range(n):
        lo = opaque(0)
        for i in range(lo, a.size):
            a[i] = b[i]
    return a[0]


@njit(cache=True)
def stream2_daxpy(n, a, b, q):
    for _ in range(n):
        lo = opaque(0)
        for i in range(lo, a.size):
            a[i] = a[i] + q * b[i]
    return a[0]


@njit(cache=True)
def stream2_sum(n, a, b, q):
    # per-pass sums are accumulated so no pass is dead code
    total = 0.0
    for _ in range(n):
        lo = opaque(0)
        acc = 0.0
        for i in range(lo, a.size):
            acc += a[i]
        total += acc
    return total
