/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_sawtoothfit_free: (a: number, b: number) => void;
export const psi_curves: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
export const sawtooth_fit: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number];
export const sawtoothfit_affine: (a: number) => [number, number];
export const sawtoothfit_bands: (a: number) => number;
export const sawtoothfit_error: (a: number) => number;
export const sawtoothfit_scaled_error: (a: number) => number;
export const sawtoothfit_values: (a: number) => [number, number];
export const sawtoothfit_xs: (a: number) => [number, number];
export const umd_trace: (a: number, b: number, c: number, d: number, e: number, f: bigint) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
