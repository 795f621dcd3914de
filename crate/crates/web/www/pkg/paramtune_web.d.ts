/* tslint:disable */
/* eslint-disable */

export class Demo {
    free(): void;
    [Symbol.dispose](): void;
    count(): number;
    gridsearch(): string;
    height(): number;
    image(index: number): Uint8Array;
    mask(index: number): Uint8Array;
    constructor(count: number, seed: bigint);
    /**
     * Segments one image; returns the metrics as JSON and keeps the
     * rendering for [`Demo::segmentation`].
     */
    segment(index: number, n: number, k: number): string;
    /**
     * RGBA pixels of the last segmentation.
     */
    segmentation(): Uint8Array;
    train(episodes: number, seed: bigint): string;
    width(): number;
}

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_demo_free: (a: number, b: number) => void;
    readonly demo_count: (a: number) => number;
    readonly demo_gridsearch: (a: number) => [number, number, number, number];
    readonly demo_height: (a: number) => number;
    readonly demo_image: (a: number, b: number) => [number, number, number, number];
    readonly demo_mask: (a: number, b: number) => [number, number, number, number];
    readonly demo_new: (a: number, b: bigint) => [number, number, number];
    readonly demo_segment: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly demo_segmentation: (a: number) => [number, number];
    readonly demo_train: (a: number, b: number, c: bigint) => [number, number, number, number];
    readonly demo_width: (a: number) => number;
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
