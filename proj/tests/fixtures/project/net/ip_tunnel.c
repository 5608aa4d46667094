// SPDX-License-Identifier: Apache-2.0
void ip_tunnel_xmit(struct sk_buff *skb, struct net_device *dev, const struct iphdr *tnl_params)
{
	struct ip_tunnel_info *tun_info = NULL;
	struct ip_tunnel *tunnel = netdev_priv(dev);
	const struct iphdr *inner_iph;
	unsigned int max_headroom;
	struct rtable *rt = NULL;
	struct flowi4 fl4;
	bool use_cache = false;
	bool connected = false;
	bool md = false;
	__be16 df;
	__be32 dst;
	u8 tos, ttl;
	int mtu;
	int err;

	inner_iph = (const struct iphdr *)skb_inner_network_header(skb);
	dst = tnl_params->daddr;
	if (dst == 0) {
		struct neighbour *neigh;

		if (!skb_dst(skb)) {
			dev->stats.tx_fifo_errors++;
			goto tx_error;
		}

		if (skb->protocol == htons(ETH_P_IP)) {
			rt = skb_rtable(skb);
			dst = rt_nexthop(rt, inner_iph->daddr);
		}

		if (tun_info) {
			if (!(tun_info->mode & IP_TUNNEL_INFO_TX))
				goto tx_error;
			connected = true;
			md = true;
		}

		if (!dst)
			goto tx_error;
	}

	tos = tnl_params->tos;
	if (tos & 0x1) {
		tos &= ~0x1;
		if (skb->protocol == htons(ETH_P_IP))
			tos = inner_iph->tos;
		connected = false;
	}

	ip_tunnel_init_flow(&fl4, tunnel->parms.iph.protocol, dst, tnl_params->saddr, tunnel->parms.o_key, tos,
			    dev_net(dev), tunnel->parms.link, tunnel->fwmark, skb_get_hash(skb), 0);

	if (ip_tunnel_encap(skb, &tunnel->encap, &tunnel->parms.iph.protocol, &fl4) < 0)
		goto tx_error;

	if (connected && md) {
		use_cache = ip_tunnel_dst_cache_usable(skb, tun_info);
		if (use_cache)
			rt = dst_cache_get_ip4(&tun_info->dst_cache, &fl4.saddr);
	} else {
		use_cache = ip_tunnel_dst_cache_usable(skb, NULL);
		if (use_cache)
			rt = connected ? dst_cache_get_ip4(&tunnel->dst_cache, &fl4.saddr) : NULL;
	}

	if (!rt) {
		rt = ip_route_output_key(tunnel->net, &fl4);
		if (IS_ERR(rt)) {
			dev->stats.tx_carrier_errors++;
			goto tx_error;
		}
	}

	if (rt->dst.dev == dev) {
		ip_rt_put(rt);
		dev->stats.collisions++;
		goto tx_error;
	}

	df = tnl_params->frag_off;
	mtu = skb_valid_dst(skb) ? dst_mtu(skb_dst(skb)) : dev->mtu;
	max_headroom = LL_RESERVED_SPACE(rt->dst.dev) + sizeof(struct iphdr) + rt->dst.header_len;
	if (max_headroom > dev->needed_headroom)
		dev->needed_headroom = max_headroom;

	ttl = tnl_params->ttl;
	iptunnel_xmit(NULL, rt, skb, fl4.saddr, fl4.daddr, tos, ttl, df, !net_eq(tunnel->net, dev_net(dev)));
	return;

tx_error:
	dev->stats.tx_errors++;
	kfree_skb(skb);
}
