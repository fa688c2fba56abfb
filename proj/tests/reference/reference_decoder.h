/* Test-only bridge to the patched minimp3 copy. Captures granule 0 / channel 0. */
#pragma once
#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef struct
{
    size_t byte_offset;
    int bitrate_kbps, channels, ms_stereo;
    int decoded;          /* 0 when the frame produced no granule (reservoir or side-info failure) */
    int main_data_begin;
    int part_23_length, big_values, global_gain, scalefac_compress;
    int block_type, mixed_block_flag, preflag, scalefac_scale, count1_table;
    int table_select[3], region_count[3], subblock_gain[3];
    int n_long_sfb, n_short_sfb;
    int iscf[40];
    int quant[576];
    float deq[576];
} ref_frame_t;

/* Decodes the whole buffer; returns the number of frames written (at most max_frames). */
size_t ref_decode_stream(const uint8_t *data, size_t size, ref_frame_t *out, size_t max_frames);

#ifdef __cplusplus
}
#endif
