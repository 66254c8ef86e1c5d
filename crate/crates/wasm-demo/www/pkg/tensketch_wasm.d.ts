/* tslint:disable */
/* eslint-disable */

/**
 * Histogram of ‖Sx‖/‖x‖ over independent draws of one embedding, for a
 * Kronecker input.
 */
export function accuracy_histogram(embedding: string, order: number, size: number, m: number, draws: number, seed: bigint): string;

/**
 * Modeled flops of every embedding for an order-N Kronecker input with
 * vectors of length `size`, at m = 2, 4, ... up to `m_max`.
 */
export function cost_curves(order: number, size: number, m_max: number): string;

/**
 * Internal edge sizes and merge costs for one contraction with labels
 * (a, b, c, d) at sketch size m.
 */
export function merge_shape(a: bigint, b: bigint, c: bigint, d: bigint, m: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly accuracy_histogram: (a: number, b: number, c: number, d: number, e: number, f: number, g: bigint) => [number, number];
    readonly cost_curves: (a: number, b: number, c: number) => [number, number];
    readonly merge_shape: (a: bigint, b: bigint, c: bigint, d: bigint, e: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
