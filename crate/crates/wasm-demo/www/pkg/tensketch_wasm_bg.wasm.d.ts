/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const accuracy_histogram: (a: number, b: number, c: number, d: number, e: number, f: number, g: bigint) => [number, number];
export const cost_curves: (a: number, b: number, c: number) => [number, number];
export const merge_shape: (a: bigint, b: bigint, c: bigint, d: bigint, e: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
