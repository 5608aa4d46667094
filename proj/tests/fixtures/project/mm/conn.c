// SPDX-License-Identifier: Apache-2.0
void release_conn(struct conn *cn)
{
	kfree(cn->buf);
	if (cn->flags & CONN_KEEP)
		return;
	log_byte(cn->buf[0]);
}

void drop_conn(struct conn *cn)
{
	int freed = 0;

	kfree(cn->buf);
	freed = 1;
	if (!freed)
		cn->buf[0] = 0;
}

void copy_name(const char *src, int n)
{
	char tmp[16];

	if (n > 16)
		return;
	memcpy(tmp, src, n);
}
