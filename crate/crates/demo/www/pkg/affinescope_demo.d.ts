/* tslint:disable */
/* eslint-disable */

/**
 * The best affine fit of the `m`-band sawtooth on `[a, b]`.
 */
export class SawtoothFit {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    /**
     * The fitted map at the same samples, laid out like [`Self::values`].
     */
    readonly affine: Float64Array;
    readonly bands: number;
    /**
     * `L_p` distance to the nearest affine map, averaged over the interval.
     */
    readonly error: number;
    /**
     * `error / radius`, the quantity bounded below on every long interval.
     */
    readonly scaled_error: number;
    /**
     * Band values, `m` per sample, sample-major.
     */
    readonly values: Float64Array;
    readonly xs: Float64Array;
}

/**
 * Rows `[x, ψ_{k_lo}(x), …, ψ_{k_hi}(x), Σ_k ψ_k(x)]`, each of length
 * `samples`, sampled on a log-spaced grid of `[x_min, x_max]`.
 */
export function psi_curves(k_lo: number, k_hi: number, x_min: number, x_max: number, samples: number): Float64Array;

/**
 * Fits `x ↦ Σ_k φ(2^k x) 2^{−k} e_k` in `L_fit_p(ℓ_p^m)` on `[a, b]`.
 */
export function sawtooth_fit(m: number, p: number, a: number, b: number, fit_p: number, samples: number): SawtoothFit;

/**
 * Best `β_p` lower bound for random `ℓ_q^m`-valued martingales at every
 * depth `1..=depth`, followed by the scalar constant `max{p, p'} − 1`.
 */
export function umd_trace(m: number, q: number, p: number, members: number, depth: number, seed: bigint): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_sawtoothfit_free: (a: number, b: number) => void;
    readonly psi_curves: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly sawtooth_fit: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number];
    readonly sawtoothfit_affine: (a: number) => [number, number];
    readonly sawtoothfit_bands: (a: number) => number;
    readonly sawtoothfit_error: (a: number) => number;
    readonly sawtoothfit_scaled_error: (a: number) => number;
    readonly sawtoothfit_values: (a: number) => [number, number];
    readonly sawtoothfit_xs: (a: number) => [number, number];
    readonly umd_trace: (a: number, b: number, c: number, d: number, e: number, f: bigint) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;

/**
 * Instantiates the given `module`, which can either be bytes or
 * a precompiled `WebAssembly.Module`.
 *
 * @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
 *
 * @returns {InitOutput}
 */
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
 * If `module_or_path` is {RequestInfo} or {URL}, makes a request and
 * for everything else, calls `WebAssembly.instantiate` directly.
 *
 * @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
 *
 * @returns {Promise<InitOutput>}
 */
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;
