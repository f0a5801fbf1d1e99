/* tslint:disable */
/* eslint-disable */

/**
 * A random cadlag step path against its order-n dyadic projection, with a
 * certified Skorokhod-distance upper bound between them.
 */
export function dyadic_projection_demo(params: string): string;

/**
 * Simulate one draw of the jump noise and its stochastic convolution.
 */
export function simulate_convolution(params: string): string;

/**
 * Skorokhod-distance upper bound between two random step paths, with the
 * optimal lattice time change as a witness.
 */
export function skorokhod_distance_demo(params: string): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly dyadic_projection_demo: (a: number, b: number) => [number, number, number, number];
    readonly simulate_convolution: (a: number, b: number) => [number, number, number, number];
    readonly skorokhod_distance_demo: (a: number, b: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
